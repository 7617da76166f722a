#pragma once

#include "rssloc/types.hpp"
#include "rssloc/random.hpp"
#include "rssloc/rss_model.hpp"
#include "rssloc/belief.hpp"
#include "rssloc/nlsampler.hpp"
#include "rssloc/msgpass.hpp"
#include "rssloc/estimator.hpp"
#include "rssloc/io.hpp"
#include "rssloc/harness.hpp"
#include "rssloc/sampler_demo.hpp"
