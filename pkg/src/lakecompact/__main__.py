from lakecompact.cli import main

raise SystemExit(main())
