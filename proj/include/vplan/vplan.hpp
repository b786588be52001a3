#pragma once

#include "vplan/error.hpp"
#include "vplan/geom.hpp"
#include "vplan/exam.hpp"
#include "vplan/heatmap.hpp"
#include "vplan/prescribe.hpp"
#include "vplan/metrics.hpp"
#include "vplan/phantom.hpp"
#include "vplan/io.hpp"
