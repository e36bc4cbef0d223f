#ifndef COLLAPSE_LAB_COLLAPSE_LAB_HPP_
#define COLLAPSE_LAB_COLLAPSE_LAB_HPP_

#include "collapse_lab/contrastive_loss.hpp"
#include "collapse_lab/embedding_set.hpp"
#include "collapse_lab/errors.hpp"
#include "collapse_lab/geometry.hpp"
#include "collapse_lab/heatmap.hpp"
#include "collapse_lab/io.hpp"
#include "collapse_lab/metrics.hpp"
#include "collapse_lab/random.hpp"
#include "collapse_lab/sweep.hpp"
#include "collapse_lab/theory.hpp"
#include "collapse_lab/trainer.hpp"
#include "collapse_lab/verify.hpp"

#endif  // COLLAPSE_LAB_COLLAPSE_LAB_HPP_
