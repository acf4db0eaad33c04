from rholab.cli import main

main()
