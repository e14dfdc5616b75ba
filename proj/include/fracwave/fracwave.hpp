#pragma once

#include "fracwave/analysis.hpp"
#include "fracwave/coefficients.hpp"
#include "fracwave/expression.hpp"
#include "fracwave/grid.hpp"
#include "fracwave/history.hpp"
#include "fracwave/multi_term.hpp"
#include "fracwave/problems.hpp"
#include "fracwave/quadrature.hpp"
#include "fracwave/runner.hpp"
#include "fracwave/scheme.hpp"
#include "fracwave/soe_kernel.hpp"
#include "fracwave/special.hpp"
