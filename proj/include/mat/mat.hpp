#pragma once

#include "mat/assign.hpp"
#include "mat/core.hpp"
#include "mat/drc.hpp"
#include "mat/ecc.hpp"
#include "mat/gate3dii.hpp"
#include "mat/image.hpp"
#include "mat/motion.hpp"
#include "mat/pipeline.hpp"
#include "mat/track.hpp"
#include "mat/warp.hpp"
