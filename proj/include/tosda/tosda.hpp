#ifndef TOSDA_TOSDA_HPP
#define TOSDA_TOSDA_HPP

#include "tosda/error.hpp"
#include "tosda/geometry.hpp"
#include "tosda/coarray.hpp"
#include "tosda/designer.hpp"
#include "tosda/metrics.hpp"
#include "tosda/simulator.hpp"
#include "tosda/io.hpp"

#endif  // TOSDA_TOSDA_HPP
