#pragma once

#include "petdet/error.hpp"
#include "petdet/corpus.hpp"
#include "petdet/collocation.hpp"
#include "petdet/embedding.hpp"
#include "petdet/topic_filter.hpp"
#include "petdet/paraphrase.hpp"
#include "petdet/sentiment.hpp"
#include "petdet/ranking.hpp"
#include "petdet/config.hpp"
#include "petdet/pipeline.hpp"
