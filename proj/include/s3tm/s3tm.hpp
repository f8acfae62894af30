#pragma once

#include "s3tm/common.hpp"
#include "s3tm/random.hpp"
#include "s3tm/utf8.hpp"
#include "s3tm/corpus.hpp"
#include "s3tm/binary_io.hpp"
#include "s3tm/embed.hpp"
#include "s3tm/numerics.hpp"
#include "s3tm/topics.hpp"
#include "s3tm/s3.hpp"
#include "s3tm/model_io.hpp"
#include "s3tm/baselines.hpp"
#include "s3tm/wordvec.hpp"
#include "s3tm/metrics.hpp"
#include "s3tm/bench.hpp"
