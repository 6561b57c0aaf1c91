#pragma once

#include "aesthmine/apps.hpp"
#include "aesthmine/attribmine.hpp"
#include "aesthmine/classifier.hpp"
#include "aesthmine/corpus.hpp"
#include "aesthmine/elastic_net.hpp"
#include "aesthmine/error.hpp"
#include "aesthmine/features.hpp"
#include "aesthmine/image.hpp"
#include "aesthmine/levenshtein.hpp"
#include "aesthmine/metrics.hpp"
#include "aesthmine/pipeline.hpp"
#include "aesthmine/plsa.hpp"
#include "aesthmine/scorestats.hpp"
#include "aesthmine/spectral.hpp"
#include "aesthmine/synthetic.hpp"
#include "aesthmine/text.hpp"
