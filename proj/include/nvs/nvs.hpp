#pragma once

// Umbrella header.

#include "nvs/camera.hpp"
#include "nvs/dataset.hpp"
#include "nvs/diffusion.hpp"
#include "nvs/errors.hpp"
#include "nvs/grid.hpp"
#include "nvs/image_io.hpp"
#include "nvs/linear_system.hpp"
#include "nvs/metrics.hpp"
#include "nvs/parallel.hpp"
#include "nvs/ply_io.hpp"
#include "nvs/pose_smoothing.hpp"
#include "nvs/pyramid.hpp"
#include "nvs/random.hpp"
#include "nvs/render.hpp"
#include "nvs/solver_params.hpp"
#include "nvs/synthetic.hpp"
#include "nvs/view_ranking.hpp"
#include "nvs/warp.hpp"
#include "nvs/weights.hpp"
