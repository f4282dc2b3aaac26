#ifndef MAXNT_MAXNT_HPP
#define MAXNT_MAXNT_HPP

#include "maxnt/embed.hpp"
#include "maxnt/error.hpp"
#include "maxnt/geometry.hpp"
#include "maxnt/harness.hpp"
#include "maxnt/io.hpp"
#include "maxnt/metrics.hpp"
#include "maxnt/radio.hpp"
#include "maxnt/rigidity.hpp"
#include "maxnt/scenario.hpp"
#include "maxnt/sync.hpp"
#include "maxnt/topo.hpp"

#endif  // MAXNT_MAXNT_HPP
