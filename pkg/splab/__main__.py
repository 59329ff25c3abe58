from splab.main import main

raise SystemExit(main())
