#pragma once

#include "cfile/error.hpp"
#include "cfile/geometry.hpp"
#include "cfile/image.hpp"
#include "cfile/io.hpp"
#include "cfile/coarse.hpp"
#include "cfile/segments.hpp"
#include "cfile/vanishing.hpp"
#include "cfile/inference.hpp"
#include "cfile/hypothesis.hpp"
#include "cfile/ranking.hpp"
#include "cfile/metrics.hpp"
#include "cfile/pipeline.hpp"
#include "cfile/synth.hpp"
