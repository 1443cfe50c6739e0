// Copyright (c) 2026, The s3mnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "s3m/cli.hpp"

int main(int argc, char** argv) { return s3m::cli::run(argc, argv); }
