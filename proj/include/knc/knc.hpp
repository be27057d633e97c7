#pragma once

#include "knc/core.hpp"
#include "knc/correspondence.hpp"
#include "knc/io.hpp"
#include "knc/krylov.hpp"
#include "knc/lattice.hpp"
#include "knc/metric.hpp"
#include "knc/models.hpp"
#include "knc/nielsen.hpp"
#include "knc/parallel.hpp"
