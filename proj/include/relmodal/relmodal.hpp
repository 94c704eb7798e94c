#ifndef RELMODAL_RELMODAL_HPP
#define RELMODAL_RELMODAL_HPP

#include "core.hpp"
#include "random.hpp"
#include "hilbert.hpp"
#include "relational.hpp"
#include "composition.hpp"
#include "dynamics.hpp"
#include "superselection.hpp"

#endif
