#pragma once

#include "boost.hpp"
#include "commands.hpp"
#include "config.hpp"
#include "csv.hpp"
#include "deploy.hpp"
#include "detect.hpp"
#include "embedding.hpp"
#include "error.hpp"
#include "featurize.hpp"
#include "inject.hpp"
#include "isoforest.hpp"
#include "model.hpp"
#include "repair.hpp"
#include "table.hpp"
#include "types.hpp"
#include "value.hpp"
