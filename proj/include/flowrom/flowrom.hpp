#pragma once

#include "flowrom/dmd.hpp"
#include "flowrom/experiment.hpp"
#include "flowrom/io.hpp"
#include "flowrom/leray.hpp"
#include "flowrom/linalg.hpp"
#include "flowrom/model.hpp"
#include "flowrom/opinf.hpp"
#include "flowrom/pod.hpp"
#include "flowrom/rng.hpp"
#include "flowrom/simulate.hpp"
