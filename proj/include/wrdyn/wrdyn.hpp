#pragma once

#include "wrdyn/errors.hpp"
#include "wrdyn/matcore.hpp"
#include "wrdyn/identities.hpp"
#include "wrdyn/dynamics.hpp"
#include "wrdyn/structure.hpp"
#include "wrdyn/oracle.hpp"
#include "wrdyn/ensemble.hpp"
#include "wrdyn/io.hpp"
#include "wrdyn/cli.hpp"
