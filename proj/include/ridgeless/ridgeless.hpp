#pragma once

#include "ridgeless/augmentation.hpp"
#include "ridgeless/datasets.hpp"
#include "ridgeless/derivative.hpp"
#include "ridgeless/error.hpp"
#include "ridgeless/experiments.hpp"
#include "ridgeless/linalg.hpp"
#include "ridgeless/parallel.hpp"
#include "ridgeless/random.hpp"
#include "ridgeless/risk_path.hpp"
#include "ridgeless/spiked.hpp"
