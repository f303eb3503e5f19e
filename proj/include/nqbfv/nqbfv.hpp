#ifndef NQBFV_NQBFV_HPP
#define NQBFV_NQBFV_HPP

#include "nqbfv/rational.hpp"
#include "nqbfv/even_poly.hpp"
#include "nqbfv/graded_poly.hpp"
#include "nqbfv/parser.hpp"
#include "nqbfv/linalg.hpp"
#include "nqbfv/report.hpp"
#include "nqbfv/phase_space.hpp"
#include "nqbfv/poisson.hpp"
#include "nqbfv/algebroid.hpp"
#include "nqbfv/constraints.hpp"
#include "nqbfv/dynamics.hpp"
#include "nqbfv/bfv.hpp"
#include "nqbfv/aksz.hpp"
#include "nqbfv/problem.hpp"

#endif
