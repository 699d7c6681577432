#pragma once

// Everything in one include.
#include "fracdiff/core.hpp"
#include "fracdiff/gamma.hpp"
#include "fracdiff/quadrature.hpp"
#include "fracdiff/mittag_leffler.hpp"
#include "fracdiff/tridiagonal.hpp"
#include "fracdiff/spectral_domain.hpp"
#include "fracdiff/product_integration.hpp"
#include "fracdiff/forward_solver.hpp"
#include "fracdiff/l1_oracle.hpp"
#include "fracdiff/principle_checker.hpp"
#include "fracdiff/inverse_source.hpp"
#include "fracdiff/io.hpp"
