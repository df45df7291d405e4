#pragma once

#include "subperf/category.hpp"
#include "subperf/dataset.hpp"
#include "subperf/errors.hpp"
#include "subperf/eval.hpp"
#include "subperf/features.hpp"
#include "subperf/labeling.hpp"
#include "subperf/linalg.hpp"
#include "subperf/regress.hpp"
#include "subperf/rng.hpp"
#include "subperf/smote.hpp"
#include "subperf/stats.hpp"
#include "subperf/study.hpp"
#include "subperf/synth.hpp"
#include "subperf/text.hpp"
#include "subperf/timeutil.hpp"
#include "subperf/tree.hpp"
