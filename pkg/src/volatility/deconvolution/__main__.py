import sys

from volatility.deconvolution.cli import main

sys.exit(main())
