#pragma once

#include "scmodem/signal_core.hpp"
#include "scmodem/tx_chain.hpp"
#include "scmodem/channel_adc.hpp"
#include "scmodem/rx_chain.hpp"
#include "scmodem/fixed_point.hpp"
#include "scmodem/harness.hpp"
#include "scmodem/config.hpp"
