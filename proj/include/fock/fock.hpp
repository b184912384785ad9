#pragma once

#include "core.hpp"
#include "quadrature.hpp"
#include "moments.hpp"
#include "symbols.hpp"
#include "sphere_calculus.hpp"
#include "weyl_calculus.hpp"
#include "fock_matrices.hpp"
#include "spectral.hpp"
#include "dixmier.hpp"
#include "json_writer.hpp"
#include "experiments.hpp"
