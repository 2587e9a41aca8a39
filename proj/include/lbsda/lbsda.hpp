#pragma once

#include "lbsda/baselines.hpp"
#include "lbsda/campaigns.hpp"
#include "lbsda/config.hpp"
#include "lbsda/envs.hpp"
#include "lbsda/factory.hpp"
#include "lbsda/harness.hpp"
#include "lbsda/history_buffer.hpp"
#include "lbsda/memory_schedule.hpp"
#include "lbsda/persist.hpp"
#include "lbsda/policy.hpp"
#include "lbsda/rng.hpp"
#include "lbsda/sda.hpp"
#include "lbsda/verify.hpp"
#include "lbsda/version.hpp"
