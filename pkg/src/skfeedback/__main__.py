from skfeedback.launcher.main import main

raise SystemExit(main())
