#pragma once

#include "podgp/binio.hpp"
#include "podgp/boxmesh.hpp"
#include "podgp/config.hpp"
#include "podgp/dns.hpp"
#include "podgp/ensemble.hpp"
#include "podgp/errors.hpp"
#include "podgp/galerkin.hpp"
#include "podgp/mesh.hpp"
#include "podgp/ode.hpp"
#include "podgp/parallel.hpp"
#include "podgp/pod.hpp"
#include "podgp/quadrature.hpp"
#include "podgp/reconstruct.hpp"
#include "podgp/sampling.hpp"
#include "podgp/snapshot.hpp"
#include "podgp/timegrid.hpp"
