// mistfuse - header-only toolkit for random-object LiDAR perturbation
// SPDX-License-Identifier: MIT
//
// Umbrella header.

#ifndef MISTFUSE_MISTFUSE_HPP
#define MISTFUSE_MISTFUSE_HPP

#include "mistfuse/cloudcore/distance.hpp"
#include "mistfuse/cloudcore/io.hpp"
#include "mistfuse/cloudcore/keyvalue.hpp"
#include "mistfuse/cloudcore/point_cloud.hpp"
#include "mistfuse/eval/attack.hpp"
#include "mistfuse/eval/detection.hpp"
#include "mistfuse/eval/iou.hpp"
#include "mistfuse/eval/sweep.hpp"
#include "mistfuse/fusion/config.hpp"
#include "mistfuse/fusion/fuse.hpp"
#include "mistfuse/fusion/placement.hpp"
#include "mistfuse/objectgen/sequence.hpp"
#include "mistfuse/rangesim/calibration.hpp"
#include "mistfuse/rangesim/laser_model.hpp"
#include "mistfuse/rangesim/range_image.hpp"

#endif  // MISTFUSE_MISTFUSE_HPP
