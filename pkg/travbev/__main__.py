from travbev.cli import main

raise SystemExit(main())
