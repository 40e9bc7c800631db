#pragma once

#include "owdsg/core.hpp"
#include "owdsg/generator.hpp"
#include "owdsg/stream.hpp"
#include "owdsg/metrics.hpp"
#include "owdsg/detect.hpp"
#include "owdsg/osr.hpp"
#include "owdsg/io.hpp"
#include "owdsg/svg.hpp"
