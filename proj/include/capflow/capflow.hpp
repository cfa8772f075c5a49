#pragma once

// Umbrella header: conformal cap automorphisms and flows, capillary surface
// geometry and energies, FEM spectra of the stability forms, and the index
// laboratory built on top of them.

#include "capflow/config.hpp"
#include "capflow/geometry.hpp"
#include "capflow/moebius.hpp"
#include "capflow/flow.hpp"
#include "capflow/chart.hpp"
#include "capflow/surface.hpp"
#include "capflow/builtins.hpp"
#include "capflow/quadrature.hpp"
#include "capflow/mesh.hpp"
#include "capflow/fem.hpp"
#include "capflow/lapack.hpp"
#include "capflow/spectra.hpp"
#include "capflow/energy.hpp"
#include "capflow/index_lab.hpp"
#include "capflow/io.hpp"
