#pragma once

#include "tunekit/commands.hpp"
#include "tunekit/error.hpp"
#include "tunekit/evaluate.hpp"
#include "tunekit/launch.hpp"
#include "tunekit/mold.hpp"
#include "tunekit/optimizer.hpp"
#include "tunekit/problem.hpp"
#include "tunekit/problem_file.hpp"
#include "tunekit/record.hpp"
#include "tunekit/space.hpp"
#include "tunekit/store.hpp"
#include "tunekit/surrogate.hpp"
