#ifndef NMQSD_NMQSD_HPP
#define NMQSD_NMQSD_HPP

#include "binomial.hpp"
#include "config.hpp"
#include "ensemble.hpp"
#include "hierarchy.hpp"
#include "noise.hpp"
#include "operator.hpp"
#include "output.hpp"
#include "trajectory.hpp"

#endif  // NMQSD_NMQSD_HPP
