#pragma once

// Everything in one include.
#include "perfsampler/error.hpp"
#include "perfsampler/json.hpp"
#include "perfsampler/random.hpp"
#include "perfsampler/space/config_space.hpp"
#include "perfsampler/sampling/outcome.hpp"
#include "perfsampler/sampling/baselines.hpp"
#include "perfsampler/models/metrics.hpp"
#include "perfsampler/models/regression_tree.hpp"
#include "perfsampler/models/gbt.hpp"
#include "perfsampler/models/fnn.hpp"
#include "perfsampler/mobo/pareto.hpp"
#include "perfsampler/mobo/hypervolume.hpp"
#include "perfsampler/mobo/gp.hpp"
#include "perfsampler/mobo/ehvi.hpp"
#include "perfsampler/mobo/samplers.hpp"
#include "perfsampler/llm/gateway.hpp"
#include "perfsampler/llm/extract.hpp"
#include "perfsampler/llm/transcript.hpp"
#include "perfsampler/llm/prompts.hpp"
#include "perfsampler/llm/pipeline.hpp"
#include "perfsampler/harness/stats.hpp"
#include "perfsampler/harness/dataset.hpp"
#include "perfsampler/harness/synth.hpp"
#include "perfsampler/harness/fixtures.hpp"
#include "perfsampler/harness/protocol.hpp"
#include "perfsampler/harness/report.hpp"
