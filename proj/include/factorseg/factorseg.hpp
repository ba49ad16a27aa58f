#pragma once

#include "factorseg/bootstrap.hpp"
#include "factorseg/errors.hpp"
#include "factorseg/factor.hpp"
#include "factorseg/panel.hpp"
#include "factorseg/parallel.hpp"
#include "factorseg/pipeline.hpp"
#include "factorseg/rng.hpp"
#include "factorseg/segment.hpp"
#include "factorseg/simgen.hpp"
#include "factorseg/wavelet.hpp"
