#pragma once

#include "pcbf/matrix.hpp"
#include "pcbf/lifted_model.hpp"
#include "pcbf/barrier.hpp"
#include "pcbf/qls_solver.hpp"
#include "pcbf/controllers.hpp"
#include "pcbf/plants.hpp"
#include "pcbf/closed_loop.hpp"
#include "pcbf/scenario.hpp"
