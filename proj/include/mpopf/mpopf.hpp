#pragma once

// Umbrella header.
#include "mpopf/types.hpp"
#include "mpopf/network.hpp"
#include "mpopf/sdp.hpp"
#include "mpopf/opf.hpp"
#include "mpopf/exactness.hpp"
#include "mpopf/perturbation.hpp"
#include "mpopf/generator.hpp"
#include "mpopf/json_emit.hpp"
#include "mpopf/case_io.hpp"
#include "mpopf/report.hpp"
#include "mpopf/pipeline.hpp"
