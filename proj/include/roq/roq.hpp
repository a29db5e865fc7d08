#pragma once

// roq: routing protocols over pluggable transports, in a deterministic
// discrete-event simulator. Umbrella include.

#include "roq/bgp/fsm.hpp"
#include "roq/bgp/message.hpp"
#include "roq/bgp/rib.hpp"
#include "roq/bgp/router.hpp"
#include "roq/harness/config.hpp"
#include "roq/harness/experiment.hpp"
#include "roq/harness/report.hpp"
#include "roq/harness/rib.hpp"
#include "roq/netsim.hpp"
#include "roq/ospf/lsdb.hpp"
#include "roq/ospf/neighbor.hpp"
#include "roq/ospf/packet.hpp"
#include "roq/ospf/router.hpp"
#include "roq/ospf/spf.hpp"
#include "roq/prefix.hpp"
#include "roq/transport.hpp"
