#pragma once

#include "econfreq/model.hpp"
#include "econfreq/linalg.hpp"
#include "econfreq/dispatch.hpp"
#include "econfreq/dynamics.hpp"
#include "econfreq/experiments.hpp"
#include "econfreq/io.hpp"
#include "econfreq/cli.hpp"
