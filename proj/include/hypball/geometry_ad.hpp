#pragma once

#include "hypball/autodiff.hpp"
#include "hypball/geometry.hpp"

namespace hypball::ad {

// Differentiable counterparts of the geometry kernels. Branches (norm floors,
// projection activation) are decided on recorded values, so each tape sees a
// smooth piece of the function. Forward values agree with the geom:: kernels;
// unit tests pin that equivalence.

Var conformal_factor(Tape& t, Var x, const geom::Curvature& k);

// Eq.-exact gyrovector addition without the stability projection.
Var mobius_add_raw(Tape& t, Var x, Var y, double c);

// Gyrovector addition with the result re-projected to the effective radius
// (rescale branch is differentiable).
Var mobius_add(Tape& t, Var x, Var y, const geom::Curvature& k);

Var hyp_distance(Tape& t, Var x, Var y, const geom::Curvature& k);

Var exp_map(Tape& t, Var x, Var v, const geom::Curvature& k);
Var exp_map_origin(Tape& t, Var v, const geom::Curvature& k);

// Norm cap at (1/sqrt(c)) * (1 - alpha); min with the curvature's stability
// margin, gradients flow through the rescale.
Var clip_to_ball(Tape& t, Var x, double alpha, const geom::Curvature& k);

}  // namespace hypball::ad
