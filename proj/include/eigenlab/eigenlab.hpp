#ifndef EIGENLAB_EIGENLAB_HPP
#define EIGENLAB_EIGENLAB_HPP

#include "eigenlab/common.hpp"
#include "eigenlab/geometry.hpp"
#include "eigenlab/quadrature.hpp"
#include "eigenlab/eigenmodes.hpp"
#include "eigenlab/microlocal.hpp"
#include "eigenlab/flowout.hpp"
#include "eigenlab/bounds.hpp"
#include "eigenlab/schrodinger.hpp"
#include "eigenlab/io.hpp"
#include "eigenlab/experiments.hpp"

#endif  // EIGENLAB_EIGENLAB_HPP
