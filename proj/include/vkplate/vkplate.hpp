#ifndef VKPLATE_VKPLATE_HPP
#define VKPLATE_VKPLATE_HPP

#include "vkplate/adaptivity.hpp"
#include "vkplate/estimator.hpp"
#include "vkplate/forms.hpp"
#include "vkplate/geometry.hpp"
#include "vkplate/mesh.hpp"
#include "vkplate/mesh_io.hpp"
#include "vkplate/morley.hpp"
#include "vkplate/problems.hpp"
#include "vkplate/quadrature.hpp"
#include "vkplate/report.hpp"
#include "vkplate/solver.hpp"

#endif  // VKPLATE_VKPLATE_HPP
