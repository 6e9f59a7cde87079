#pragma once

#include "common.hpp"
#include "taxonomy.hpp"
#include "sessions.hpp"
#include "transitions.hpp"
#include "needs.hpp"
#include "relevance.hpp"
#include "temporal.hpp"
#include "anticipate.hpp"
#include "evaluate.hpp"
#include "config.hpp"
