#pragma once

#include "rhpsvm/data.hpp"
#include "rhpsvm/errors.hpp"
#include "rhpsvm/eval.hpp"
#include "rhpsvm/kernel.hpp"
#include "rhpsvm/loss.hpp"
#include "rhpsvm/model.hpp"
#include "rhpsvm/solver.hpp"
