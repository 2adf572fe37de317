#pragma once

#include "manicore/errors.hpp"
#include "manicore/parallel.hpp"

#include "manicore/funcspace/multiindex.hpp"
#include "manicore/funcspace/taylor_rep.hpp"
#include "manicore/funcspace/grid_rep.hpp"
#include "manicore/funcspace/norms.hpp"
#include "manicore/funcspace/smooth_map.hpp"
#include "manicore/funcspace/faa_di_bruno.hpp"
#include "manicore/funcspace/inversion.hpp"

#include "manicore/linmodel/splitting.hpp"
#include "manicore/linmodel/cutoff.hpp"
#include "manicore/linmodel/problem.hpp"
#include "manicore/linmodel/problem_io.hpp"

#include "manicore/constants/ledger.hpp"

#include "manicore/theta/triple.hpp"
#include "manicore/theta/theta.hpp"
#include "manicore/theta/bootstrap.hpp"

#include "manicore/taylor/homological.hpp"
#include "manicore/aposteriori/certify.hpp"
#include "manicore/verify/checks.hpp"

#include "manicore/io/report.hpp"
