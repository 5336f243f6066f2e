#ifndef GTRWS_GTRWS_HPP
#define GTRWS_GTRWS_HPP

#include "gtrws/baselines.hpp"
#include "gtrws/decomposition.hpp"
#include "gtrws/diagnostics.hpp"
#include "gtrws/error.hpp"
#include "gtrws/generators.hpp"
#include "gtrws/io.hpp"
#include "gtrws/model.hpp"
#include "gtrws/trace.hpp"
#include "gtrws/trws.hpp"

#endif  // GTRWS_GTRWS_HPP
