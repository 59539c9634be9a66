#ifndef RELERR_RELERR_HPP
#define RELERR_RELERR_HPP

#include "relerr/asymptotics.hpp"
#include "relerr/bessel.hpp"
#include "relerr/cli.hpp"
#include "relerr/data.hpp"
#include "relerr/errors.hpp"
#include "relerr/estimator.hpp"
#include "relerr/finite_diff.hpp"
#include "relerr/io/csv.hpp"
#include "relerr/io/report.hpp"
#include "relerr/lag.hpp"
#include "relerr/linalg.hpp"
#include "relerr/loss.hpp"
#include "relerr/objective.hpp"
#include "relerr/quadrature.hpp"
#include "relerr/rng.hpp"
#include "relerr/sampling.hpp"
#include "relerr/simulation.hpp"
#include "relerr/util.hpp"

#endif  // RELERR_RELERR_HPP
