from conformal_cantor.cli import main

raise SystemExit(main())
