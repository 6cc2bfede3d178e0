#ifndef RISKMAPS_RISKMAPS_HPP
#define RISKMAPS_RISKMAPS_HPP

#include "riskmaps/error.hpp"
#include "riskmaps/geo.hpp"
#include "riskmaps/path.hpp"
#include "riskmaps/rldm.hpp"
#include "riskmaps/motion.hpp"
#include "riskmaps/survival.hpp"
#include "riskmaps/planner.hpp"
#include "riskmaps/config_io.hpp"
#include "riskmaps/scenario.hpp"
#include "riskmaps/sim.hpp"
#include "riskmaps/service.hpp"

#endif  // RISKMAPS_RISKMAPS_HPP
