#pragma once

#include "cells.hpp"
#include "constructible.hpp"
#include "decompose.hpp"
#include "error.hpp"
#include "expr.hpp"
#include "integrate.hpp"
#include "oracle.hpp"
#include "padic.hpp"
#include "parser.hpp"
#include "polynomial.hpp"
#include "rational.hpp"
#include "simple.hpp"
#include "sums.hpp"
#include "zeta.hpp"
