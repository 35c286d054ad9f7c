#pragma once

#include "diskprep/core.hpp"
#include "diskprep/csv.hpp"
#include "diskprep/dataset.hpp"
#include "diskprep/dataset_io.hpp"
#include "diskprep/ingest.hpp"
#include "diskprep/analysis.hpp"
#include "diskprep/numstats.hpp"
#include "diskprep/typefilter.hpp"
#include "diskprep/filling.hpp"
#include "diskprep/changepoint.hpp"
#include "diskprep/backtrack.hpp"
#include "diskprep/features.hpp"
#include "diskprep/tree.hpp"
#include "diskprep/model.hpp"
#include "diskprep/eval.hpp"
#include "diskprep/synth.hpp"
#include "diskprep/pipeline.hpp"
