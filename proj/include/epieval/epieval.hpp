#pragma once

#include "epieval/curve.hpp"
#include "epieval/errors.hpp"
#include "epieval/features.hpp"
#include "epieval/harness.hpp"
#include "epieval/io.hpp"
#include "epieval/measures.hpp"
#include "epieval/ranking.hpp"
#include "epieval/report.hpp"
#include "epieval/series.hpp"
#include "epieval/stochastic.hpp"
#include "epieval/svg.hpp"
