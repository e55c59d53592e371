#!/usr/bin/env python

# Exists to run this from a development checkout. Because we cannot run
# the gatebudget.script module directly due to relative imports.

import gatebudget.script
gatebudget.script.run()
