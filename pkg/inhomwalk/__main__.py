from inhomwalk.cli import main

raise SystemExit(main())
