#pragma once

#include "belltide/qcore.hpp"
#include "belltide/protocols.hpp"
#include "belltide/correlators.hpp"
#include "belltide/optimizer.hpp"
#include "belltide/report.hpp"
#include "belltide/verify.hpp"
