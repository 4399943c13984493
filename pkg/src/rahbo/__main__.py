from rahbo.cli import main
import sys

sys.exit(main())
