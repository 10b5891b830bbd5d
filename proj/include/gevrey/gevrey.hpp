#pragma once

#include "gevrey/core.hpp"
#include "gevrey/special.hpp"
#include "gevrey/polynomial.hpp"
#include "gevrey/mode_space.hpp"
#include "gevrey/instance.hpp"
#include "gevrey/series.hpp"
#include "gevrey/borel.hpp"
#include "gevrey/fixed_point.hpp"
#include "gevrey/geometry.hpp"
#include "gevrey/summation.hpp"
