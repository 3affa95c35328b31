#pragma once

#include "ilab/core.hpp"
#include "ilab/operator.hpp"
#include "ilab/oracles.hpp"
#include "ilab/dirichlet.hpp"
#include "ilab/eigen.hpp"
#include "ilab/kpp.hpp"
#include "ilab/liouville.hpp"
#include "ilab/io.hpp"
#include "ilab/oracle_check.hpp"
#include "ilab/config.hpp"
#include "ilab/runner.hpp"
