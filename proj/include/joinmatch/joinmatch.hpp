#pragma once

#include "joinmatch/actor.hpp"
#include "joinmatch/buffer.hpp"
#include "joinmatch/core.hpp"
#include "joinmatch/engine.hpp"
#include "joinmatch/factory.hpp"
#include "joinmatch/mailbox.hpp"
#include "joinmatch/oracle.hpp"
#include "joinmatch/parallel.hpp"
#include "joinmatch/trace.hpp"
#include "joinmatch/tree.hpp"
