#ifndef STREAMLABEL_STREAMLABEL_HPP
#define STREAMLABEL_STREAMLABEL_HPP

#include "streamlabel/bus.hpp"
#include "streamlabel/errors.hpp"
#include "streamlabel/hwsim.hpp"
#include "streamlabel/image.hpp"
#include "streamlabel/labeling.hpp"
#include "streamlabel/message.hpp"
#include "streamlabel/net.hpp"
#include "streamlabel/pipeline.hpp"

#endif
