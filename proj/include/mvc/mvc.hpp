#pragma once

// Umbrella header for the library (everything except the CLI).

#include "mvc/aes.hpp"
#include "mvc/bench.hpp"
#include "mvc/bytes.hpp"
#include "mvc/container.hpp"
#include "mvc/crypto_engine.hpp"
#include "mvc/errors.hpp"
#include "mvc/file_io.hpp"
#include "mvc/jwt.hpp"
#include "mvc/key_client.hpp"
#include "mvc/key_material.hpp"
#include "mvc/key_service.hpp"
#include "mvc/random.hpp"
#include "mvc/sealer.hpp"
#include "mvc/secure_memory.hpp"
#include "mvc/sha256.hpp"
#include "mvc/unsealer.hpp"
